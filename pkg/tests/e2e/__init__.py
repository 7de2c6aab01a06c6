"""End-to-end acceptance runs of the lab at desk scale."""
