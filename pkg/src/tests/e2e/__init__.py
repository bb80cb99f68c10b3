"""End-to-end test directory."""



