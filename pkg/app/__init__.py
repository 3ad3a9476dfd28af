# RevLab: reversible computing lab
