"""Test factories package."""


