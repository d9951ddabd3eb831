"""Dataset generators, benchmark sweeps and reporting"""
