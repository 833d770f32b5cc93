"""Reference values for the zero sequence, used for reconciliation output.

Each row: interval upper bound, zeroes, primes among them, X/ln X,
difference in percent, averaged gap.
"""

TABLE = [
    (10**2, 10, 5, 4.342, 13.16, 9.2),
    (10**3, 16, 6, 5.770, 3.82, 9.25),
    (10**4, 59, 21, 14.469, 31.09, 36.20),
    (10**5, 139, 36, 28.169, 21.75, 526.57),
    (10**6, 151, 37, 30.096, 18.65, 1503.97),
    (10**7, 151, 37, 30.096, 18.65, 1503.97),
    (10**8, 2415, 313, 310.034, 0.947, 40170.11),
    (10**9, 7730, 846, 863.41, -2.058, 887722.55),
    (10**10, 11631, 1161, 1242.438, -7.014, 523588.07),
    (10**11, 11631, 1161, 1242.438, -7.014, 523588.07),
    (8 * 10**11, 194530, 14556, 15973, -9.734, 2750072.04),
]

ZEROES = {row[0]: row[1] for row in TABLE}
PRIMES = {row[0]: row[2] for row in TABLE}
N_OVER_LOG_N = {row[0]: row[3] for row in TABLE}
AVERAGE_GAP = {row[0]: row[5] for row in TABLE}

FIRST_ZERO_ABOVE_1E8 = 202_640_007
LAST_DIGIT_COUNTS = {1: 38835, 3: 38905, 5: 38799, 7: 38898, 9: 39093}
LAST_DIGIT_FIT = {"a": 19.93459, "se_a": 0.04315, "b": 0.01308, "se_b": 0.00751}
MAX_GAP_8E11 = 451_035_880_384
