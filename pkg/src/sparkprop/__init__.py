"""Keyframe-conditioned video super-resolution at desk scale.

Sparse high-resolution keyframes are encoded into a sparse reference
latent, fused with the low-resolution video latent along the channel axis,
and propagated by a one-step denoiser whose reference adherence is tuned
at inference by a reference-free guidance scale.
"""

__version__ = "0.1.0"
