from setuptools import setup

def long_description() -> str:
    "Return contents of README.md as long package description."
    with open('README.md', 'rt', encoding='utf-8') as f:
        return f.read()

setup(name='reactmix',
      version='0.1.0',
      package_dir={'reactmix': 'src/reactmix'},
      packages=['reactmix'],
      description='Simulator and verification suite for reactive '
      'multicomponent compressible Stokes mixtures.',
      long_description=long_description(),
      long_description_content_type='text/markdown',
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Intended Audience :: Science/Research',
          'License :: OSI Approved :: MIT License',
          'Operating System :: OS Independent',
          'Programming Language :: Python',
          'Programming Language :: Python :: 3',
          'Programming Language :: Python :: 3 :: Only',
          'Topic :: Scientific/Engineering :: Physics',
          'Topic :: Scientific/Engineering :: Mathematics'
      ],
      entry_points = {
              'console_scripts': [
                  'reactmix=reactmix.main:main',
              ],
          },
      python_requires='>=3.8',
      install_requires=['lz4', 'numpy', 'scipy', 'tqdm', 'zstandard'],
      extras_require={'test': ['pytest']},
      )
