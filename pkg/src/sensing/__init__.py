"""Grid-core: measurement model, norms and snapshot file formats"""
