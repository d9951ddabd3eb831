"""HTTP routers for placement and reconstruction"""
