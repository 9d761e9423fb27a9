"""Dense neural-network kernel: MLPs, losses, optimizers, gradient checks, checkpoints."""
