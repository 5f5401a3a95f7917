"""Reference values produced by ``oracles.py`` and frozen here.

``test_oracles.py`` recomputes each entry from its oracle.
"""

# spectrum and soft edges at phi = 0.7 (mpmath bisection, 50 digits)
RANDOM_SPECTRUM = [
    -1.607008119483333,
    -0.39631458987390566,
    0.3147003514591191,
    0.3771906632801799,
    1.9212679513298463,
]
RANDOM_SPECTRUM_PHI = 0.7
RANDOM_SPECTRUM_LOWER = -7.204528295985336
RANDOM_SPECTRUM_UPPER = 7.4526624984130345

DIAG13_LOWER = -0.41421356237309503
DIAG13_UPPER = 4.414213562373095

# 1x1 closed forms
DELTA2_TAU_QUARTER = 0.9148542155126762

# moments by quadrature
GAUSSIAN_ABS_MOMENT_3 = 1.5957691216057308
CUBE_MOMENT_4 = 1.8

# chi-square(50) survival at 150
CHI2_50_TAIL_150 = 6.315223256933963e-12

# sup_t P{|Z| > t} t^3 for the trace scalar law with C = 1, eta = 2
SCALAR_LAW_XM = 0.2563726633091643
SCALAR_LAW_TAIL_SUP = 0.9862386735329859
