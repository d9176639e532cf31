"""Special functions, fractional operators, symmetry classes and invariant
solutions of the time-fractional telegraph system

    D_t^alpha u = v_x,    D_t^alpha v = f(x) u_x + g(x) u.
"""

__version__ = "0.1.0"
