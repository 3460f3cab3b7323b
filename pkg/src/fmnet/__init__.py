"""Desk-scale FMNet: frequency-assisted Mamba-like linear attention for
camouflaged object detection, built on a from-scratch numpy autodiff core."""

from .tensor import Tensor, no_grad
from .fourier import ComplexTensor, fft2, ifft2, magnitude

__all__ = ["Tensor", "ComplexTensor", "no_grad", "fft2", "ifft2", "magnitude"]
__version__ = "0.1.0"
