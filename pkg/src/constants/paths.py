RECORDS_FILE_PATTERN = "{case}_{strategy}.csv"
SUMMARY_FILE_NAME = "summary.csv"
GRID_FILE_NAME = "deflection_grid.csv"
VTK_FILE_PATTERN = "mesh_{step:03d}.vtk"
