#pragma once

// Generated by tools/gen_gelu_table.py; do not edit.
// Piecewise polynomials on [0, 8.5] in 16 equal pieces, coefficient-major:
// value = sum_k table[k][piece] * s^k with s in [-1, 1] inside the piece.

#include <algorithm>
#include <cmath>

namespace norm::kernels::gelu {

inline constexpr int kPieces = 16;
inline constexpr int kDegree = 14;
inline constexpr double kMax = 8.5;
inline constexpr double kInvHalfWidth = 3.764705882352941;

// Q(u) = Phi(-u), the standard normal tail.
alignas(64) inline constexpr double kTail[15][16] = {
    {0.39526401492557056, 0.21276181576078956, 0.09206840789906445, 0.031487001432402066, 0.008409861255997257, 0.001739655738833898, 0.00027706608089643616, 3.3828979658909423e-05, 3.1565147245802047e-06, 2.2454747915064343e-07, 1.2156246392127916e-08, 5.001102965589362e-10, 1.5617790317158512e-11, 3.6988737546037443e-13, 6.638917965482851e-15, 9.024873311591926e-17},
    {-0.10229580713668841, -0.07714155599748614, -0.043868169934588384, -0.018812269899180764, -0.006083639148976714, -0.0014835980446583406, -0.00027283470964470905, -3.7836725882780345e-05, -3.956927004866881e-06, -3.120563971672517e-07, -1.855832186707914e-08, -8.322903831252511e-10, -2.814761561364026e-11, -7.178586006244383e-13, -1.3805964923290013e-14, -2.0022817296467764e-16},
    {0.003608824250793817, 0.008164273565651914, 0.007737976752377956, 0.0046456569831595075, 0.0019315851350693888, 0.0005757273173790118, 0.00012512695362978173, 2.0022242029034766e-05, 2.373093551624876e-06, 2.091676851617895e-07, 1.3748834889075138e-08, 6.753215547648363e-10, 2.4825014991276625e-11, 6.837708326013332e-13, 1.412448633079519e-14, 2.1897512226297528e-16},
    {0.0011180659116839227, 0.0003310977913587704, -0.0003940776246450303, -0.0005436027894287171, -0.000337318284447293, -0.00013149879756630433, -3.504861240587823e-05, -6.6185719649905356e-06, -9.022813042748618e-07, -8.979879637310794e-08, -6.572265741538365e-09, -3.5551728630860193e-10, -1.4265413643795111e-11, -4.2575954092187553e-13, -9.471220539866134e-15, -1.5729696847900361e-16},
    {-6.215949630511028e-05, -0.00011352814689678875, -5.6238282471481534e-05, 1.2490551610853803e-05, 3.0835741485028615e-05, 1.8744580951838684e-05, 6.5655422206347245e-06, 1.5157404075504601e-06, 2.4265698386369323e-07, 2.7635836804822616e-08, 2.2728356077123905e-09, 1.3629220271050404e-10, 5.99881962210426e-12, 1.947303375740973e-13, 4.678770852803854e-15, 8.343715418250088e-17},
    {-1.095589316039759e-05, 1.3019266153270952e-06, 8.138703286779498e-06, 4.5194100927805485e-06, -3.46192648865429e-07, -1.517903245772084e-06, -8.334939152300986e-07, -2.507890231115204e-07, -4.866231880005947e-08, -6.459203651407762e-09, -6.039697609072142e-10, -4.047245603575753e-11, -1.9653048524257295e-12, -6.968737530742667e-14, -1.8144478369795957e-15, -3.4834929631070083e-17},
    {7.13603868369784e-07, 1.0220921706959175e-06, 5.0531602297002585e-08, -4.895256408740575e-07, -2.534495585799785e-07, 2.0005993743844305e-08, 6.565280265763987e-08, 2.997767061202433e-08, 7.445299381292731e-09, 1.183190176627859e-09, 1.2776745143724289e-10, 9.664292724545465e-12, 5.213379092388316e-13, 2.0294146104548224e-14, 5.747540457370642e-16, 1.1913877789673302e-17},
    {8.483233639204673e-08, -4.18422584575984e-08, -7.090852426890031e-08, -3.421952684818477e-09, 2.589972909121633e-08, 1.0531621244965584e-08, -1.6017181194556333e-09, -2.42588049925079e-09, -8.670217419833821e-10, -1.723390666040903e-10, -2.1971422096227458e-11, -1.9005105058957155e-12, -1.148631199022948e-13, -4.9376451297818336e-15, -1.5276341247422776e-16, -3.430068914017633e-18},
    {-6.142773971177767e-09, -6.619555474554704e-09, 2.74491630723423e-09, 3.911898949041459e-09, -1.3983517120908426e-10, -1.1729673589799353e-09, -3.126673023690234e-10, 9.430831025106386e-11, 7.371126719050908e-11, 1.9934713874039385e-11, 3.1034770933365827e-12, 3.124606320504095e-13, 2.1384985801219877e-14, 1.0223784961260882e-15, 3.47270409974324e-17, 8.477406672357508e-19},
    {-5.337648552517552e-10, 4.4270841654839694e-10, 3.7881380216916424e-10, -1.9120118554212846e-10, -1.6779747085915862e-10, 2.890839917035891e-11, 4.2852819098162026e-11, 5.550616169150939e-12, -3.8762865220041035e-12, -1.7871435628901524e-12, -3.602151643351734e-13, -4.3303338994202757e-14, -3.403342851072534e-15, -1.8253767891782607e-16, -6.847391270205753e-18, -1.8250300957245798e-19},
    {4.229168935000227e-11, 3.214506214783402e-11, -3.057919257857899e-11, -1.5090905297136144e-11, 1.1532301059313338e-11, 5.1128559948291e-12, -1.9696590447415658e-12, -1.1789234177812327e-12, 2.6509716902403378e-15, 1.1455570079680324e-13, 3.3908637218086356e-14, 5.067615928495167e-15, 4.661996488144684e-16, 2.8361720432345424e-17, 1.1832601769060146e-18, 3.460045588752633e-20},
    {2.8097816399276587e-12, -3.173784058102951e-12, -1.206217215093459e-12, 1.7811761986838847e-12, 3.030408654817217e-13, -5.276186905133769e-13, -8.316954678213645e-14, 8.138904053406908e-14, 2.2091347007989303e-14, -3.644546400667455e-15, -2.4882642418004334e-15, -4.976284299608089e-16, -5.509967962857777e-17, -3.856043022752574e-18, -1.8039719438499155e-19, -5.8171761747893356e-21},
    {-2.425515024821833e-13, -1.1583064021786749e-13, 1.9889073344577827e-13, 7.358933551737592e-15, -7.767114293651005e-14, 6.792157692138221e-15, 1.688420321123119e-14, -8.75846740101966e-16, -2.22217919974808e-15, -2.0525040455816503e-16, 1.2597084533539984e-16, 4.021118065853645e-17, 5.608576880294439e-18, 4.60741570014397e-19, 2.44501633378973e-20, 8.761278057963097e-22},
    {-1.2478920264635632e-14, 1.7377003426109927e-14, 6.745702431926887e-16, -9.027940803949373e-15, 2.2093652469797868e-15, 2.2127240651270293e-15, -7.586057962514324e-16, -3.357902372098001e-16, 9.290776284231127e-17, 3.958432288545333e-17, -1.805376422198325e-18, -2.545270465824771e-18, -4.944484840532577e-19, -4.9673467765633024e-20, -3.0680798407256845e-21, -1.246513099898707e-22},
    {1.1732656357420245e-15, 2.71372360462966e-16, -9.27711363367727e-16, 2.804263481603828e-16, 2.567217156907617e-16, -1.5196603387491396e-16, -2.8254423821087524e-17, 2.899097334613856e-17, 2.3183128233604174e-18, -2.7890861445790366e-18, -3.867031676150435e-19, 1.0630547244038605e-19, 3.5538249012979363e-20, 4.523256109908401e-21, 3.2747357771846364e-22, 1.5046122879279286e-23},
};

// phi(u), the standard normal density.
alignas(64) inline constexpr double kDensity[15][16] = {
    {0.38511362686753287, 0.29041526963759484, 0.16515075740080332, 0.070822663149857, 0.022903112090265278, 0.005585310285772577, 0.0010271424363094929, 0.00014244414449987895, 1.489666637126355e-05, 1.1748005540414185e-06, 6.986662349959222e-08, 3.133328501177414e-09, 1.0596749407487402e-10, 2.7025264964672435e-12, 5.197539735816086e-14, 7.538001805672444e-16},
    {-0.02717232377068286, -0.06147217743549676, -0.058262413194375196, -0.03497906434378923, -0.014543699840522457, -0.004334888036736089, -0.000942132356741886, -0.00015075570468920293, -1.7867998506352007e-05, -1.5749096294534742e-06, -1.035206391648009e-07, -5.084774059405807e-09, -1.869177599343218e-10, -5.1483921513523665e-12, -1.0634907354964403e-13, -1.6487538617526011e-15},
    {-0.012627567943724322, -0.003739457408287258, 0.004450759054814453, 0.006139513857077264, 0.003809712389051788, 0.0014851628901606144, 0.00039584315187815214, 7.475093042812863e-05, 1.0190471201222196e-05, 1.0141981708021308e-06, 7.422794249265081e-08, 4.015254057132599e-09, 1.6111525997775953e-10, 4.808578344667215e-12, 1.0696907905052892e-13, 1.776530468162141e-15},
    {0.0009360488855357705, 0.0017096003297398775, 0.0008468823713352566, -0.0001880930124928605, -0.00046434998942160776, -0.0002822713366865108, -9.886934167544082e-05, -2.2825267313701172e-05, -3.6541286981826207e-06, -4.1616318953143865e-07, -3.4226230327908356e-08, -2.0524002290529093e-09, -9.033516607392283e-11, -2.932409789314257e-12, -7.045678460285344e-14, -1.2564653803794225e-15},
    {0.00020622857713723647, -2.450685393612336e-05, -0.00015319912069218858, -8.5071248805071e-05, 6.516567507912414e-06, 2.8572296390991465e-05, 1.5689297227895723e-05, 4.720734552683407e-06, 9.159965891734832e-07, 1.215850099093839e-07, 1.1368842558573503e-08, 7.618344665526946e-10, 3.699397367868973e-11, 1.3117623562468068e-12, 3.415431200863132e-14, 6.557163110351522e-16},
    {-1.611905208545918e-05, -2.3087258443953996e-05, -1.1414197225207e-06, 1.1057520358595925e-05, 5.724978264398158e-06, -4.519000939884938e-07, -1.4829809541466413e-06, -6.771426773528383e-07, -1.6817617426027153e-07, -2.672617810742898e-08, -2.886041255957065e-09, -2.1829931800774602e-10, -1.1776103362690009e-11, -4.58408947634466e-13, -1.2982679658039295e-14, -2.691134770398383e-16},
    {-2.2355815730726168e-06, 1.102666579519377e-06, 1.8686481680932367e-06, 9.017851641246887e-08, -6.82534036276204e-07, -2.775391950782314e-07, 4.2209983149718404e-08, 6.39290861247805e-08, 2.2848572992589118e-08, 4.5416412810818525e-09, 5.790115919313586e-10, 5.008404158526748e-11, 3.02698113566384e-12, 1.3012148820154782e-13, 4.025766669334931e-15, 9.039248058816981e-17},
    {1.8500589815920125e-07, 1.9936543546571402e-07, -8.267042036738536e-08, -1.1781719198739149e-07, 4.211506320121799e-09, 3.532701696696274e-08, 9.416803450442103e-09, -2.840344407133961e-09, -2.220009927663445e-09, -6.003866764091372e-10, -9.346942789368151e-11, -9.410579056889382e-12, -6.440654506817898e-13, -3.079163344303328e-14, -1.045896624383858e-15, -2.5531945596394206e-17},
    {1.808521634734525e-08, -1.5000014431406228e-08, -1.2835100194067336e-08, 6.4783504483255095e-09, 5.685370141800322e-09, -9.794848454224275e-10, -1.4519536071855714e-09, -1.8806802048826546e-10, 1.3133762198684674e-10, 6.055264008493525e-11, 1.220494403990238e-11, 1.4672189587070472e-12, 1.1531296969910722e-13, 6.184754048174968e-15, 2.3200117983526337e-16, 6.1833915563900286e-18},
    {-1.5921572275205512e-09, -1.2101670396382965e-09, 1.151216331984901e-09, 5.681284017549792e-10, -4.3415719294431493e-10, -1.9248405947779556e-10, 7.415188667779026e-11, 4.4383007101736323e-11, -9.980465822546231e-14, -4.312685697554696e-12, -1.2765602007081204e-12, -1.9078079641573182e-13, -1.7551053003362133e-14, -1.0677376745987492e-15, -4.454652177188058e-17, -1.3026211989482134e-18},
    {-1.1636942862658166e-10, 1.3145057381437512e-10, 4.994718524705644e-11, -7.376868416249167e-11, -1.2544676536505373e-11, 2.1850040209767234e-11, 3.4430233926413382e-12, -3.3703288396460805e-12, -9.147039779251837e-13, 1.5090929773224748e-13, 1.0303268122971043e-13, 2.060776156794189e-14, 2.2822453061541106e-15, 1.597687845765123e-16, 7.477845238965283e-18, 2.4128343281277986e-19},
    {1.0957193932726237e-11, 5.2328143310114296e-12, -8.984893567289123e-12, -3.3262720773233055e-13, 3.5088876724225604e-12, -3.0678542369769897e-13, -7.627833326153885e-13, 3.95608184712187e-14, 1.0039315503252864e-13, 9.272917518688848e-15, -5.691144447245696e-15, -1.8166328590480657e-15, -2.53369250049152e-16, -2.0812655650721542e-17, -1.1043483890078688e-18, -3.9566569820436606e-20},
    {6.197232918894141e-13, -8.65083415328516e-13, -2.95501603227781e-14, 4.4737992718250157e-13, -1.1189464268586394e-13, -1.0862376349206786e-13, 3.80521889395433e-14, 1.6327699788666504e-14, -4.655496672459284e-15, -1.923284602701412e-15, 9.681326435891868e-17, 1.2449785503872905e-16, 2.3828320662055558e-17, 2.3654857542482574e-18, 1.4441879834043595e-19, 5.797994315121885e-21},
    {-6.169571679466405e-14, -1.4301191015988724e-14, 4.879991752031421e-14, -1.4721269364318503e-14, -1.3523932556520288e-14, 7.989408629187663e-15, 1.4940479344399e-15, -1.5257127463121246e-15, -1.231692447273704e-16, 1.4685834207634857e-16, 2.045694779110898e-17, -5.591709596425182e-18, -1.875227418419129e-18, -2.3907634438562225e-19, -1.7334356514041807e-20, -7.97617273451799e-22},
    {-2.7658633026961465e-15, 4.501609114242918e-15, -1.0655645608937237e-15, -1.7050713171403398e-15, 1.158486584638939e-15, 1.0173062160930854e-16, -2.84632681181345e-16, 3.26824843583878e-17, 3.337924031341798e-17, -4.3119445646528635e-18, -2.6019682540203042e-18, 2.1660991230926845e-20, 1.140216259015353e-19, 2.018500175299062e-20, 1.7655449072782027e-21, 9.313531400106208e-23},
};

// Scalar evaluation of the tables with the same operation order as the SIMD
// variants. Returns {Phi(x), phi(x)}.
struct CdfPdf {
  double cdf, pdf;
};

inline CdfPdf eval(double x) {
  const double u = std::fabs(x);
  if (!(u < kMax)) return {x < 0.0 ? 0.0 : 1.0, 0.0};
  const double q = u * kInvHalfWidth;
  const int piece = std::min(static_cast<int>(q * 0.5), kPieces - 1);
  const double s = q - (2.0 * piece + 1.0);
  double t = kTail[kDegree][piece], d = kDensity[kDegree][piece];
  for (int k = kDegree - 1; k >= 0; --k) {
    t = std::fma(t, s, kTail[k][piece]);
    d = std::fma(d, s, kDensity[k][piece]);
  }
  return {x < 0.0 ? t : 1.0 - t, d};
}

}  // namespace norm::kernels::gelu
