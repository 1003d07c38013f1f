# -*- coding: utf-8 -*-
"""Sphinx configuration of the Graph Willmore documentation."""

import os
import sys

sys.path.insert(0, os.path.abspath("../../src"))

project = "Graph Willmore"
copyright = "2024, Graph Willmore developers"
author = "Graph Willmore developers"
version = "0.1.0"
release = "0.1.0"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.viewcode",
    "myst_parser",
]

source_suffix = [".rst", ".md"]
master_doc = "index"
language = "en"
pygments_style = "sphinx"

html_theme = "ska_ser_sphinx_theme"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3.10/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}

nitpicky = True
myst_heading_anchors = 3
