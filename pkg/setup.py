from setuptools import find_packages, setup

VERSION = '0.3.0'

test_deps = []

setup(
    name='nodule_cascade',
    version=VERSION,
    description='Cascaded lung-nodule screening and classification (U-Net screening + fused-input classifier)',
    package_dir={'': 'python'},
    packages=find_packages('python', exclude=[]),
    package_data={'': ['VERSION'],
                  'nodule_cascade': ['py.typed']},
    install_requires=[
        'dataclasses',
        'numpy>=1.19.5',
        'scipy',  # rank statistics for AUC
        'torch>=1.8.0',
        'pytest>=5.2.2',
        'PyYAML>=5.3.1',  # checkpoint and dataset manifests
        'cachetools>=4.1.0',
        'h5py>=2.10.0',  # probability-map store
        'tqdm>=4.48.0',
        'pandas',
        'structlog>=20.2.0'
    ],
    tests_require=test_deps,
    extras_require={
        'test': test_deps
    },
    entry_points={
        'console_scripts': ['nodule-cascade=nodule_cascade.cli:main'],
    },
)
