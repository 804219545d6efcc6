# Exact enumeration of equal-margin tables
