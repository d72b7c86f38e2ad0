"""Desk-scale lab for multi-device scheduling of variational quantum algorithms."""

from . import cloudsim, fileio, optimizer, qoncord, qsim, vqa

__all__ = ["cloudsim", "fileio", "optimizer", "qoncord", "qsim", "vqa"]
__version__ = "0.1.0"
