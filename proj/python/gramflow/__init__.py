"""Python surface of the gramflow core.

Every function mirrors a C++ entry point; the heavy lifting happens in the
`_gramflow` extension and results cross the boundary as JSON, decoded here
into plain dicts.
"""

import json

try:
    from . import _gramflow
except ImportError:  # source checkout: extension sits on PYTHONPATH
    import _gramflow

__version__ = _gramflow.__version__

activation_eval = _gramflow.activation_eval


def regression_dataset(n, d, seed):
    """Unit-ball regression sample (points carry an appended bias coordinate)."""
    return json.loads(_gramflow.regression_dataset_json(n, d, seed))


def regression_gram(n, d, seed):
    """Closed-form limiting kernel of the sampled dataset, plus its spectrum."""
    return json.loads(_gramflow.regression_gram_json(n, d, seed))


def pinn_dataset(instance, d, n1, n2, seed):
    """Collocation sample for the named PDE instance."""
    return json.loads(_gramflow.pinn_dataset_json(instance, d, n1, n2, seed))


def pinn_gram(instance, d, n1, n2, activation, n_mc, seed):
    """Monte Carlo limiting kernel estimate for the PDE residual operator."""
    return json.loads(
        _gramflow.pinn_gram_json(instance, d, n1, n2, activation, n_mc, seed)
    )


def train_regression(n, d, m, seed, iters=500, eta=None, diag_gram=False):
    """Full-batch gradient descent on the sampled regression problem."""
    return json.loads(
        _gramflow.train_regression_json(n, d, m, seed, iters, eta, diag_gram)
    )


def train_pinn(
    instance,
    d,
    n1,
    n2,
    activation,
    m,
    seed,
    optimizer="gd",
    iters=500,
    eta=None,
    n_mc=50000,
    diag_gram=False,
):
    """Train on PDE residuals with gradient descent or the natural-gradient step."""
    return json.loads(
        _gramflow.train_pinn_json(
            instance, d, n1, n2, activation, m, seed, optimizer, iters, eta, n_mc, diag_gram
        )
    )


def run_config(config_text):
    """Execute a full experiment config (flat key = value text); returns the manifest."""
    return json.loads(_gramflow.run_config(config_text))
