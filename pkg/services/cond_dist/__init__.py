# Conditioned Poisson models, boxes and samplers
