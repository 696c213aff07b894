# Sphinx configuration for the bfstrip documentation.
# Build with: sphinx-build -b html docs/source docs/build

import os
import sys
sys.path.insert(0, os.path.abspath('../..'))

project = 'bfstrip'
copyright = '2026, bfstrip developers'
author = 'bfstrip developers'
release = '0.0.1'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.mathjax',
]
autosummary_generate = True
autodoc_member_order = 'bysource'

exclude_patterns = ['autosummary/*.tmp']

html_theme = 'alabaster'
