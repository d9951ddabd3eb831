"""Unit and end-to-end tests for christoffel-osp"""
