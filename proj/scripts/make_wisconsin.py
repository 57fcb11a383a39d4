"""Export the Wisconsin diagnostic breast cancer data to data/wisconsin.csv."""
import csv
from sklearn.datasets import load_breast_cancer

bc = load_breast_cancer()
names = [n.replace(" ", "_") for n in bc.feature_names]
with open("data/wisconsin.csv", "w", newline="") as f:
    w = csv.writer(f)
    w.writerow(names + ["malignant"])
    for row, target in zip(bc.data, bc.target):
        # sklearn codes 0 = malignant; flip so 1 marks the malignant class
        w.writerow([repr(float(v)) for v in row] + [1 - int(target)])
print("rows:", len(bc.data))
