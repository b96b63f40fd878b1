"""Rope-pushing dataset pipeline: collection, storage, validation, replay."""

from griprack.dataset.sampling import sample_push, accept_candidate

__all__ = ["sample_push", "accept_candidate"]
