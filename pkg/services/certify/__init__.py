# Certified provers for the rate-function inequalities
