"""Toolkit for auditing how model compression redistributes prediction error.

Compares populations of compressed and non-compressed models, ranks the
examples they disagree on, and reports disaggregated error metrics when
ground truth and attribute labels are available.
"""

__version__ = "0.1.0"
