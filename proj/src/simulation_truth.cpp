// Eigenfunction coefficients of the B-spline simulation designs. Each matrix
// is the Q factor (diag(R) > 0) of a standard normal matrix drawn with
// numpy.random.default_rng(20080517) in the order easy, practical, hybrid.
#include "fpca/errors.hpp"
#include "fpca/simulation.hpp"

namespace fpca {

namespace {

const double kEasy[5][3] = {
    {-0.31972610883053476, 0.15574434921372646, -0.38825308975798228},
    {-0.17706178683815016, 0.47005495241593714, -0.10665778926745532},
    {-0.27558124312070487, 0.15828142610797427, -0.7415664753522011},
    {0.88831929194708636, 0.23307190274280451, -0.37507490730245913},
    {-0.036988551856501947, 0.82183728176465587, 0.38377288964662998},
};

const double kPractical[10][5] = {
    {-0.076155362827456718, 0.461456259451617, -0.40831551869197585, -0.078852696439136366,
     -0.042641245479462075},
    {-0.11053405018902643, 0.084231640319121698, -0.35304715081284105, 0.36693295279524957,
     -0.23213774783606284},
    {0.05575824917448139, 0.12268089598472248, 0.27244175253583636, -0.33984499879098651,
     0.48183279036192578},
    {0.3947116178671834, -0.27069538286760508, 0.10439889980005682, 0.20781963531976355,
     0.32428002163984204},
    {-0.072133552491763814, 0.45394414565331187, 0.26841429433920344, -0.34419528228572444,
     0.038257180031173413},
    {0.090523159397235986, 0.44019732637132375, 0.31182812345003114, 0.065531365890365609,
     -0.023170526066560809},
    {0.079559809015886246, -0.071648410299673684, -0.35662979946696721, -0.66521187528187375,
     -0.29004842998660318},
    {-0.85234553101091981, -0.17947269544070063, -0.048287044519561714, -0.03452370108867929,
     0.36761271517706656},
    {-0.26166814156487406, 0.19996784035240939, 0.43916948517176863, 0.23499234210663639,
     -0.4533409369301083},
    {0.091573824282978694, 0.46310528504521958, -0.36310219838452884, 0.28066698830588344,
     0.42448525252888292},
};

const double kHybrid[10][10] = {
    {-0.57853379928410065, 0.2454135608186917, 0.078483117640708991, 0.071921307250286656,
     -0.5061082120961643, -0.022719509069018505, 0.17200042810682512, 0.052644977567309396,
     -0.11935226205967422, -0.53895848748000108},
    {-0.13894493719475287, 0.34946266245866847, -0.34664655341081108, 0.59382800367522215,
     0.25600342392711245, -0.50543765099739724, 0.11794863660318874, 0.047964273696697778,
     0.18531064624690255, 0.11923573661588256},
    {-0.25320715751699913, 0.28592544567594391, -0.22386155499950258, -0.36495335201927542,
     0.6168379946880389, 0.14983545698700237, -0.32991243220657601, -0.067202225590467055,
     0.055945078536968958, -0.38910133669486541},
    {-0.10770292955816982, 0.14412744355134158, 0.060172406194164488, -0.039276697391223664,
     0.027993119433521379, 0.31556084880999352, 0.07557061712545525, 0.8477452778431469,
     0.32438363516489604, 0.18026092332120683},
    {0.42622691055700168, 0.26637937788610211, 0.27478690364891817, 0.076759474439901651,
     -0.24353370483816025, -0.28310126806892766, -0.62859878593517626, 0.14896899500223965,
     0.18658011161444879, -0.27272231636803596},
    {0.098645537827747209, -0.45596415142147995, -0.74936832612736237, 0.090905909438289564,
     -0.2366987775619504, 0.067716852772382957, -0.22719903485822915, 0.20146135627778006,
     0.0021452768469630286, -0.24438987854691291},
    {0.34722367766925777, -0.040319300167617263, -0.054480645609022715, -0.44067190003847689,
     0.071499795228079296, -0.45169308220991111, 0.54967791178767134, 0.16937803038859173,
     0.14475573561361779, -0.34600924750325895},
    {-0.28007481242599519, -0.50968553902979641, 0.26868656815648628, 0.11865429587968508,
     0.10141011385592705, -0.072214028867111701, -0.043248737818842031, -0.17336232488626799,
     0.70963020689445111, -0.1565521644774889},
    {0.42404528321508556, 0.18461287860388298, 0.0012082784078513028, 0.41182368441255951,
     0.084292272900231183, 0.56199325052756322, 0.30112969579108506, -0.18089636712954679,
     0.16670401522097547, -0.37731824356749794},
    {0.007632518439184487, 0.37519829595954629, -0.32820580398513333, -0.33975992371377539,
     -0.3990082734579577, 0.11035157968072455, 0.022352895119855627, -0.34277454908700744,
     0.50588949867514277, 0.30117905989967231},
};

template <std::size_t R, std::size_t C>
MatrixXd to_matrix(const double (&a)[R][C]) {
  MatrixXd out(static_cast<Index>(R), static_cast<Index>(C));
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = a[i][j];
  return out;
}

}  // namespace

MatrixXd truth_coefficients(Setting setting) {
  switch (setting) {
    case Setting::kEasy:
      return to_matrix(kEasy);
    case Setting::kPractical:
      return to_matrix(kPractical);
    case Setting::kHybrid:
      return to_matrix(kHybrid);
    case Setting::kChallenging:
      break;
  }
  throw InvalidOptionError("the challenging design has no B-spline coefficients");
}

}  // namespace fpca
