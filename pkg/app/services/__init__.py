# Services, one module per lab area
