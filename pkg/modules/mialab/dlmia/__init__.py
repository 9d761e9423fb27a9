"""DL-MIA attack: disentangled encoder, truth-level score reweighting and alternating training."""
