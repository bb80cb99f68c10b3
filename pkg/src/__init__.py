"""DCSMD-SW simulator - Source Package"""
