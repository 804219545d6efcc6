# Scalar rate functions and Poisson bounds
