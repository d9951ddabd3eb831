from setuptools import setup, find_packages

setup(
    name="christoffel-osp",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=1.24",
        "scipy>=1.10",
        "joblib>=1.3",
        "fastapi>=0.95.0",
        "uvicorn>=0.21.1",
        "pydantic>=2.5",
        "python-dotenv>=1.0.0",
        "httpx>=0.24",
    ],
    extras_require={"test": ["pytest>=7.0"]},
    entry_points={"console_scripts": ["christoffel-osp=src.cli:main"]},
    author="Christoffel OSP Team",
    description="Christoffel-function sensor placement for diffusion posterior sampling",
    keywords="sensor placement, Christoffel function, diffusion models, inverse problems",
    python_requires=">=3.9",
)
