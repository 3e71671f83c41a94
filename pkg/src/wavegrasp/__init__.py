"""Wave-disturbed top grasping with a from-scratch Soft Actor-Critic."""

__version__ = "0.1.0"
