from setuptools import setup, find_packages

import sys
if sys.version_info < (3,8):
    sys.exit('Sorry, Python < 3.8 is not supported')

setup(name='hdqual',
      version='0.1.0',
      description='Hyperdimensional quality classification of machining '
                  'sensor data, with energy metering',
      url='',
      license='BSD',
      packages=find_packages(),
      install_requires=[
          'numpy',
          'scipy',
          'pandas',
          'matplotlib',
          'colorama>=0.4.6',
          'configobj'
      ],
      extras_require={
          'tests': ['pytest'],
          'docs': ['sphinx', 'sphinx_rtd_theme', 'numpydoc']
      },
      scripts=[
          'bin/hdqual'
      ],
      zip_safe=False,
      package_data={'hdqual':['data/*.json']}
)
