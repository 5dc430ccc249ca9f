"""
uvtex: single-image UV texture reconstruction

Reconstructs a complete, topology-consistent UV texture for a fixed-topology
head mesh from one posed image, in three stages: projection and inpainting
initialization, generator-latent correction, and diffusion-style enhancement.

Submodules:
- common: Shared utilities (configuration, errors, logging, PNG I/O, external hooks)
- geometry: Meshes, cameras, rasterization, bilinear sampling
- registration: Non-rigid ICP template registration
- projection: Partial texture projection and visibility mask synthesis
- fusion: Poisson solver and seamless fusion
- inpaint: Texture completion baselines and the external inpainter hook
- generator: Synthetic corpus, linear eigen-texture generator, Z->W mapper
- optimize: Differentiable UV rendering, compound loss, latent optimization
- enhance: Diffusion schedule and SDEdit-style repainting
- metrics: PSNR / SSIM reports
- pipeline: Stage orchestration and ablation settings
"""

__version__ = "0.1.0"
