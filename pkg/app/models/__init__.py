# Frozen value types
