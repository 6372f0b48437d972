# Allocators Package
