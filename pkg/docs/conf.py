#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# optoarray documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys
sys.path.insert(0, os.path.abspath('../'))

from importlib.metadata import version as meta_version

# -- General configuration ------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.mathjax', 'sphinx.ext.napoleon']

source_suffix = '.rst'

# The master toctree document.
master_doc = 'index'

# General information about the project.
project = 'optoarray'
copyright = '2024 optoarray developers'
author = 'optoarray developers'

# The short X.Y version.
version = meta_version("optoarray")
# The full version, including alpha/beta/rc tags.
release = version

language = "en"

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

pygments_style = 'sphinx'

todo_include_todos = False


# -- Options for HTML output ----------------------------------------------

html_theme = "pydata_sphinx_theme"

html_theme_options = {}


# -- Options for HTMLHelp output ------------------------------------------

htmlhelp_basename = 'optoarraydoc'


# -- Options for LaTeX output ---------------------------------------------

latex_elements = {}

latex_documents = [
    (master_doc, 'optoarray.tex', 'optoarray Documentation',
     author, 'manual'),
]


# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'optoarray', 'optoarray Documentation',
     [author], 1)
]

suppress_warnings = ["ref.python"]
