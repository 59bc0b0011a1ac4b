import numpy as np
from hypothesis import strategies as st

from oham_damper.etp import EtpExpression, EtpTerm, Phase
from oham_damper.oham import TrialSolution

# published step-1 coefficients for the benchmark parameter set
PRINTED_STEP1 = TrialSolution(
    A=5.0,
    v0=0.1,
    lam=0.4221369200,
    omega=1.17,
    C=(
        -8.3835528344,
        0.4059363155,
        9.8101433224,
        12.7300955924,
        -8.3640772984,
        -14.6926248464,
        -15.2775231617,
    ),
)


def etp_terms(max_power=3, rate=(-2.0, 0.3), freq=(0.0, 4.0), coeff=(-5.0, 5.0)):
    return st.builds(
        EtpTerm,
        coeff=st.floats(*coeff, allow_nan=False),
        power=st.integers(0, max_power),
        rate=st.floats(*rate, allow_nan=False),
        freq=st.floats(*freq, allow_nan=False),
        phase=st.sampled_from([Phase.COS, Phase.SIN]),
    )


def etp_expressions(min_size=1, max_size=6, **kw):
    return st.lists(etp_terms(**kw), min_size=min_size, max_size=max_size).map(EtpExpression)


def random_expression(rng: np.random.Generator, n_terms: int, max_power=3) -> EtpExpression:
    terms = [
        EtpTerm(
            coeff=float(rng.uniform(-3, 3)),
            power=int(rng.integers(0, max_power + 1)),
            rate=float(rng.uniform(-1.5, 0.2)),
            freq=float(rng.uniform(0, 3)),
            phase=Phase(int(rng.integers(0, 2))),
        )
        for _ in range(n_terms)
    ]
    return EtpExpression(terms)
