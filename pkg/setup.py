import setuptools

with open('README.md', 'r') as fh:
    long_description = fh.read()

REQUIREMENTS = [
    'networkx >= 2.5',
    'numpy >= 1.20',
    'PyYAML >= 5.4',
]

DEV_REQUIREMENTS = [
    'coveralls >= 3',
    'flake8',
    'hypothesis >= 6',
    'pytest >= 6',
    'pytest-cov >= 2',
]

setuptools.setup(
    name='corank',
    version='1.0.0',
    description=(
        'Exact ranks of sparsified symmetric random matrices, their combinatorial characterization, and seeded'
        ' campaigns that test it.'
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    author='Justintime50',
    license='MIT',
    packages=setuptools.find_packages(exclude=['test', 'test.*']),
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    install_requires=REQUIREMENTS,
    extras_require={
        'dev': DEV_REQUIREMENTS,
    },
    entry_points={
        'console_scripts': [
            'corank=corank.cli:main',
        ]
    },
    python_requires='>=3.9',
)
