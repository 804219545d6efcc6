# Outward-rounded interval arithmetic
