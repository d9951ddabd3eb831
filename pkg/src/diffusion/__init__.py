"""Gaussian-mixture denoiser, VE reverse diffusion with DPS guidance, online ensemble C-DPS"""
