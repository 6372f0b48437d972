# Generators Package
