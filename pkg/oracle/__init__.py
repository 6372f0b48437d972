# Oracle Package
