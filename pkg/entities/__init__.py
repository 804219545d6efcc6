# Entities package
