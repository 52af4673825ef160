# Sphinx configuration of the nodule_cascade API reference.
# Build with ./generate_sources.sh followed by sphinx-build . _build

import os
import sys

dir_path = os.path.dirname(os.path.realpath(__file__))
sys.path.insert(0, os.path.abspath(dir_path + '/../python/'))

project = 'nodule_cascade'
copyright = '2021, nodule_cascade developers'
author = 'nodule_cascade developers'
version = release = '0.3.0'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.viewcode',
    'sphinx.ext.mathjax',
    'sphinx.ext.inheritance_diagram',
]

source_suffix = ['.rst']
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

html_theme = 'classic'
html_title = 'nodule_cascade API reference'

autosummary_generate = True
autodoc_default_options = {
    'members': True,
    'undoc-members': True,
    'member-order': 'bysource',
}
autodoc_typehints = 'description'
autodoc_mock_imports = ['torch', 'h5py', 'scipy']
inheritance_graph_attrs = dict(rankdir='TB', size='""')
