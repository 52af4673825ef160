import torch

from ..interfaces import ShapeMismatchError

__all__ = ['BCE_EPS', 'bce_loss', 'class_cross_entropy']

BCE_EPS = 1e-7


def bce_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """
    Mean binary cross entropy, -mean(t * log(y) + (1 - t) * log(1 - y)), with y clamped to [eps, 1 - eps].

    :param pred: predicted probabilities
    :param target: {0, 1} targets of the same shape
    :return: non-negative scalar tensor
    """
    if pred.shape != target.shape:
        raise ShapeMismatchError('bce_loss target shape', tuple(pred.shape), tuple(target.shape))
    y = pred.clamp(BCE_EPS, 1. - BCE_EPS)
    t = target.to(y.dtype)
    return -(t * torch.log(y) + (1. - t) * torch.log(1. - y)).mean()


def class_cross_entropy(probs: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """
    Cross entropy of a 2-class softmax against one-hot targets given as class indices.

    For two classes this equals bce_loss on the malignant probability.

    :param probs: (N, 2) softmax outputs
    :param targets: (N,) class indices, 1 for malignant
    :return: scalar tensor
    """
    if probs.dim() != 2 or probs.shape[1] != 2:
        raise ShapeMismatchError('classifier output shape', ('N', 2), tuple(probs.shape))
    return bce_loss(probs[:, 1], targets)
