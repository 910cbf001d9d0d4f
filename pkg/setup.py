from setuptools import setup, find_packages

setup(
    name="traffic_graph_sim",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_data={"traffic_graph_sim": ["scenarios/*.json"]},
    install_requires=[
        "pydantic>=2.0.0",
        "colorlog>=6.7.0",
        "numpy>=1.24.0",
        "pandas>=2.0.0",
        "torch>=2.1.0",
    ],
    extras_require={
        "test": ["pytest>=7.4.0"],
    },
    entry_points={
        "console_scripts": [
            "traffic-graph-sim=traffic_graph_sim.cli:main",
        ],
    },
    description="Data-driven traffic microsimulation on dynamic heterogeneous graphs",
    keywords="traffic, simulation, car-following, graph transformer, idm, krauss",
    python_requires=">=3.9",
)
