import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="bfstrip",
    version="0.0.1",
    author="bfstrip developers",
    description="Bloch-Floquet dispersion of thin bi-material strips with periodic interfacial cracks",
    long_description=long_description,
    long_description_content_type="text/markdown",
    package_dir={'': '.'},
    packages=setuptools.find_packages(exclude=['tests', 'examples*']),
    python_requires='>=3.8',
    install_requires = [
        'inform',
        'matplotlib',
        'numpy',
        'scipy>=1.9',
        'shlib',
        'pint',
        'click',
        'pandas>=1.5',
        'pyyaml',
        'mpire',
        'tqdm',
    ],
    extras_require={
        'test': ['pytest'],
    },
    entry_points={
        'console_scripts': [
            'bfstrip = bfstrip.cli:cli',
        ],
    },
)
