"""Sphinx configuration file for an LSST stack package.

This configuration only affects single-package Sphinx documentation builds.
"""

import lsst.ts.snapfaas  # type: ignore # noqa
from documenteer.conf.guide import *  # type: ignore # noqa

project = "ts_snapfaas"
html_theme_options["logotext"] = project  # type: ignore # noqa
html_title = project
html_short_title = project
doxylink = {}  # type: ignore # noqa

intersphinx_mapping["numpy"] = ("https://numpy.org/doc/stable", None)  # type: ignore # noqa
intersphinx_mapping["pandas"] = ("https://pandas.pydata.org/docs", None)  # type: ignore # noqa

extensions = [
    "sphinx_automodapi.automodapi",
]
