# Sampling Package
