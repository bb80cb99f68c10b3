"""Stateless services: graphs, geometry, noise, problems, metrics and artifacts."""
