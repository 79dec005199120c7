#pragma once

namespace realera::tools {

// Transcribed accuracy triples with their printed harmonic means; same
// content as data/hmean_reference.csv (a unit test keeps the two in sync).
inline constexpr char kHmeanReferenceCsv[] = R"csv(method,concept,acc_e,acc_s,acc_g,expected_h
FMN,airplane,96.76,98.32,94.15,6.13
FMN,automobile,95.08,96.86,79.45,11.44
FMN,bird,99.46,98.13,96.75,1.38
FMN,cat,94.89,97.97,95.71,6.83
AC,airplane,96.24,98.55,93.35,6.11
AC,automobile,94.41,98.47,73.92,13.19
AC,bird,99.55,98.53,94.57,1.24
AC,cat,98.94,98.63,99.10,1.45
SPM,airplane,86.61,98.90,95.25,10.16
SPM,automobile,92.26,98.88,73.22,16.98
SPM,bird,77.86,98.46,94.43,12.77
SPM,cat,22.29,98.55,81.10,39.51
UCE,airplane,40.32,98.79,49.83,64.09
UCE,automobile,4.73,99.02,37.25,82.12
UCE,bird,10.71,98.35,15.97,90.18
UCE,cat,2.35,98.02,2.58,97.70
SLD-M,airplane,91.37,98.86,89.26,13.69
SLD-M,automobile,84.89,98.86,66.15,28.34
SLD-M,bird,80.72,98.39,85.00,23.31
SLD-M,cat,88.56,98.43,92.17,13.31
ESD-x,airplane,33.11,97.15,32.28,74.98
ESD-x,automobile,59.68,98.39,58.83,50.62
ESD-x,bird,18.57,97.24,40.55,76.17
ESD-x,cat,12.51,97.52,21.91,86.98
ESD-u,airplane,7.38,85.48,5.92,90.57
ESD-u,automobile,30.29,91.02,32.12,74.88
ESD-u,bird,13.17,86.17,20.65,83.98
ESD-u,cat,11.77,91.45,13.50,88.68
MACE,airplane,9.06,95.39,10.03,92.03
MACE,automobile,6.97,95.18,14.22,91.15
MACE,bird,9.88,97.45,15.48,90.39
MACE,cat,2.22,98.85,3.91,97.56
RealEra,airplane,3.38,96.18,8.87,94.58
RealEra,automobile,1.93,97.54,4.82,96.88
RealEra,bird,9.03,94.08,9.33,91.88
RealEra,cat,2.67,95.43,2.41,96.77
FMN,deer,98.95,94.13,60.24,3.04
FMN,dog,97.64,98.12,96.95,3.94
FMN,frog,91.60,94.59,63.61,19.10
FMN,horse,99.63,93.14,46.61,1.10
FMN,ship,97.97,98.21,96.75,3.70
FMN,truck,97.64,97.86,95.37,4.62
AC,deer,99.45,98.47,64.78,1.62
AC,dog,98.50,98.57,95.76,3.29
AC,frog,99.92,98.62,92.44,0.24
AC,horse,99.74,98.63,45.29,0.77
AC,ship,98.18,98.50,77.47,4.97
AC,truck,98.50,98.61,95.12,3.40
SPM,deer,73.74,98.44,68.86,37.34
SPM,dog,97.85,98.56,96.81,3.80
SPM,frog,76.29,98.44,90.82,18.60
SPM,horse,57.47,98.47,44.76,57.94
SPM,ship,88.52,98.58,60.16,24.52
SPM,truck,93.00,98.64,93.18,10.01
UCE,deer,11.88,98.39,8.94,92.34
UCE,dog,13.22,98.69,14.63,89.90
UCE,frog,20.86,98.32,18.50,85.53
UCE,horse,4.66,98.32,12.70,93.42
UCE,ship,6.13,98.41,21.44,89.44
UCE,truck,20.58,98.16,50.00,70.13
SLD-M,deer,57.62,98.45,39.91,59.53
SLD-M,dog,94.27,98.53,82.84,12.35
SLD-M,frog,81.92,98.19,59.78,33.20
SLD-M,horse,81.76,98.44,36.71,37.14
SLD-M,ship,89.24,98.56,41.02,24.99
SLD-M,truck,91.06,98.72,80.62,17.29
ESD-x,deer,19.01,96.98,10.19,88.77
ESD-x,dog,28.54,96.38,44.49,70.78
ESD-x,frog,11.56,97.37,13.73,90.45
ESD-x,horse,16.86,97.02,15.05,87.96
ESD-x,ship,33.35,97.93,34.78,73.99
ESD-x,truck,36.06,97.24,44.29,68.38
ESD-u,deer,18.14,73.81,6.93,82.17
ESD-u,dog,27.03,89.75,28.52,77.24
ESD-u,frog,12.32,88.05,7.62,89.32
ESD-u,horse,17.69,82.23,9.89,84.73
ESD-u,ship,18.38,94.32,15.93,86.33
ESD-u,truck,26.11,85.35,21.47,78.98
MACE,deer,13.47,97.71,6.08,92.48
MACE,dog,11.07,96.77,10.86,91.47
MACE,frog,11.45,97.75,13.08,90.83
MACE,horse,4.89,97.48,7.85,94.86
MACE,ship,8.58,98.56,14.40,91.56
MACE,truck,7.29,98.38,9.38,93.79
RealEra,deer,7.73,97.67,5.68,94.70
RealEra,dog,9.54,94.91,10.99,91.39
RealEra,frog,11.1,96.27,11.45,91.10
RealEra,horse,5.21,97.45,16.79,91.38
RealEra,ship,4.27,94.36,7.87,94.05
RealEra,truck,2.21,95.21,5.54,95.80
)csv";

}  // namespace realera::tools
