"""Test fixtures package."""


