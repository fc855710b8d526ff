from setuptools import setup, find_packages

setup(
    name="roboserv",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    py_modules=['run_robot'],  # Include the root-level script
    package_data={'roboserv': ['scenarios/*.json']},
    install_requires=[
        "numpy>=1.20.0",
        "scipy>=1.7.0",
        "simpy>=4.0.0",
        "uproot>=4.0.0",
        "tqdm>=4.60.0",
        "setuptools>=45.0.0",
    ],
    extras_require={
        'test': ["pytest>=7.0.0"],
    },
    entry_points={
        'console_scripts': [
            'roboserv=run_robot:main',
        ],
    },
    author="Wi Han Ng",
    description="Deterministic desk-scale robot runtime with SLAM, vision, speech and cloud offloading",
    long_description=open('README.md').read(),
    long_description_content_type="text/markdown",
    python_requires='>=3.8',
)
