# %% [markdown]
# # Amplitudes with rational squared magnitudes and phases
#
# In C_p an amplitude has squared magnitude m/p and phase 2 pi n/p. Sums of
# such amplitudes usually leave the set, and Niven's theorem decides when
# a cosine at a rational angle is rational.

# %%
from fractions import Fraction

from supermeasured.ist import (
    RationalAmplitude,
    RationalAngle,
    closure_failure_rate,
    exclusivity_check,
    niven_report_lines,
    superpose,
)

for line in niven_report_lines(8):
    print(line)

# %%
a = RationalAmplitude.from_integers(4, 0, 16)
b = RationalAmplitude.from_integers(4, 4, 16)
print(superpose(a, b))
print(superpose(a, RationalAmplitude.from_integers(2, 3, 16)))
# the square root can cancel against an irrational cosine
print(superpose(RationalAmplitude.from_integers(5, 0, 16), RationalAmplitude.from_integers(10, 6, 16)))

# %%
for p in (16, 101, 256, 4096):
    print(p, closure_failure_rate(p, 20_000, seed=0))

# %% [markdown]
# With Born weights cos^2 of half the relative angle, two settings Y0 and Y1
# are admissible together only in special cases. When 4 divides p this
# includes pairs whose difference is not itself a Niven angle.

# %%
R = RationalAngle.from_turns
print(exclusivity_check(R(0), R(0), R(Fraction(1, 8)), 256).to_dict())
print(exclusivity_check(R(0), R(Fraction(1, 4)), R(Fraction(1, 3)), 256).to_dict())
print(exclusivity_check(R(0), R(Fraction(1, 4)), R(Fraction(1, 3)), 101).to_dict())
