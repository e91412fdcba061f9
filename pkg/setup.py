import setuptools

__author__ = 'LabelMM developers'

setuptools.setup(
    name='LabelMM',
    version='0.1.0',
    author='LabelMM developers',
    packages=['labelmm', 'tests'],
    scripts=[],
    license='LICENSE.txt',
    description='LabelMM trains classifiers on noisily labeled data, '
                'refurbishing suspect labels by Bayesian MAP selection over '
                'each sample\'s recent prediction history.',
    long_description=open('README.md').read(),
    keywords=['noisy labels', 'label refurbishment', 'classification'],
    install_requires=[
        "docopt==0.6.2",
        "numpy>=1.17",
        "scikit-learn>=0.22"
    ],
    entry_points={
        'console_scripts': ['labelmm = labelmm.cli:main'],
    },
)
