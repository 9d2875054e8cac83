"""Variational objective: reconstruction error plus KL to the edge prior."""

from dataclasses import dataclass

from camarl.errors import ConfigurationError
from camarl.nn.functional import kl_categorical_uniform


@dataclass
class ElboTerms:
    nll: object    # scalar tensors; total = nll + kl is what training minimizes
    kl: object
    total: object


def elbo_loss(pred, target, logits, sigma: float) -> ElboTerms:
    """Per-sample-averaged ELBO terms.

    nll = sum((pred - target)^2) / (2 sigma) with sigma the decoder's
    output variance; kl compares the edge posterior against the uniform
    prior over the two edge types.  Both are averaged over the batch.
    """
    if sigma <= 0:
        raise ConfigurationError(f"variance must be positive, got {sigma}")
    batch = pred.data.shape[0]
    nll = (pred - target).square().sum() * (1.0 / (2.0 * sigma * batch))
    kl = kl_categorical_uniform(logits, axis=-1).sum() * (1.0 / batch)
    return ElboTerms(nll=nll, kl=kl, total=nll + kl)
