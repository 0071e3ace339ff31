"""Normal-equations reference for the 6-observation OLS fixture (exact rational arithmetic)."""
from fractions import Fraction as F
import sympy as sp

x1 = [1, 2, 3, 4, 5, 6]
x2 = [2, 1, 4, 3, 6, 5]
y = [F("3.1"), F("2.9"), F("7.2"), F("6.8"), F("11.1"), F("10.7")]
X = sp.Matrix([[1, a, b] for a, b in zip(x1, x2)])
Y = sp.Matrix(y)
beta = (X.T * X).LUsolve(X.T * Y)
for b in beta:
    print(repr(float(b)), b)
e = Y - X * beta
ssr = sum(v * v for v in e)
ybar = sum(y) / 6
sst = sum((v - ybar) ** 2 for v in y)
print("r2", float(1 - ssr / sst))
cov = (X.T * X).inv() * ssr / 3
print("se", [float(sp.sqrt(cov[i, i])) for i in range(3)])
