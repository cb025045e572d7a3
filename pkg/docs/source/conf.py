# -*- coding: utf-8 -*-
#
# hdqual documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os
import sphinx_rtd_theme

sys.path.insert(0, os.path.abspath('../../'))

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.doctest',
    'sphinx.ext.coverage',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'numpydoc'
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'hdqual'
copyright = u'2026, the hdqual developers'

version = '0.1'
release = '0.1.0'

exclude_patterns = []

# don't prepend module names to function names in the docs
add_module_names = False

pygments_style = 'manni'

# numpydoc generates one toctree entry per class member otherwise
numpydoc_show_class_members = False

# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
html_static_path = []
htmlhelp_basename = 'hdqualdoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {
}

latex_documents = [
  ('index', 'hdqual.tex', u'hdqual Documentation',
   u'the hdqual developers', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'hdqual', u'hdqual Documentation',
     [u'the hdqual developers'], 1)
]
