"""christoffel-osp: Christoffel-function sensor placement for diffusion posterior sampling"""

__version__ = "0.1.0"
