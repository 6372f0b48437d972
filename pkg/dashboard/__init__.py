# Dashboard Package
