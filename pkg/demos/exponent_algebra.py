"""
Decay exponents
===============

Theorem exponents, the literature catalog and the bootstrap iteration
that produces them.
"""

from fractions import Fraction

from gnsdecay import bootstrap_exponents, exponent_catalog, exponent_thm_gnse, exponent_thm_nse

for beta in (1, Fraction(5, 3), 2, 3, 4):
    print(f"beta={str(beta):>4}  sigma={exponent_thm_nse(Fraction(beta))}")

# exact rational bootstrap: each pass feeds the u rate back into the w estimate
for step in bootstrap_exponents(Fraction(3, 4), Fraction(2)):
    print(step)
print("theorem:", exponent_thm_gnse(Fraction(3, 4), Fraction(2)))

print("cai_lei(3) =", exponent_catalog("cai_lei", beta=Fraction(3)))
print("jiu_yu(1, 1) =", exponent_catalog("jiu_yu", alpha=1, p=1))
