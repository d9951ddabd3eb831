"""Offline sensor placement strategies"""
